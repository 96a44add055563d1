#pragma once

#include "pprlab/error.hpp"
#include "pprlab/estimators.hpp"
#include "pprlab/experiments.hpp"
#include "pprlab/graph.hpp"
#include "pprlab/graph_io.hpp"
#include "pprlab/instance.hpp"
#include "pprlab/json_io.hpp"
#include "pprlab/lift.hpp"
#include "pprlab/oracle.hpp"
#include "pprlab/parallel.hpp"
#include "pprlab/ppr_exact.hpp"
#include "pprlab/random.hpp"
