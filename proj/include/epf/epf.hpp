#pragma once

// Hourly day-ahead electricity price forecasting: linear AR/VAR model families
// with least-squares and conjugate Bayesian estimation, rolling-window
// backtesting, and RMSE/CRPS/DM/MCS evaluation.

#include "epf/backtest.hpp"
#include "epf/cli.hpp"
#include "epf/config.hpp"
#include "epf/design.hpp"
#include "epf/estimate.hpp"
#include "epf/ingest.hpp"
#include "epf/metrics.hpp"
#include "epf/report.hpp"
#include "epf/synthetic.hpp"
