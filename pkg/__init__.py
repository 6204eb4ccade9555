"""gapdyn: gap imputation for hourly monitoring-station series with sparse-dynamics refinement."""
