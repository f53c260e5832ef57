"""Day-ahead electricity price forecasting backtests."""
