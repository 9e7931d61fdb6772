#pragma once

#include "mgtrade/benchmark.hpp"
#include "mgtrade/clearinghouse.hpp"
#include "mgtrade/domain.hpp"
#include "mgtrade/error.hpp"
#include "mgtrade/local_problem.hpp"
#include "mgtrade/matrices.hpp"
#include "mgtrade/messages.hpp"
#include "mgtrade/oracle.hpp"
#include "mgtrade/payment_admm.hpp"
#include "mgtrade/qp.hpp"
#include "mgtrade/report_io.hpp"
#include "mgtrade/scenario_io.hpp"
#include "mgtrade/trading_admm.hpp"
#include "mgtrade/wind.hpp"
