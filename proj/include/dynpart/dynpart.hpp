#pragma once

#include "dynpart/catalogue.hpp"
#include "dynpart/cli.hpp"
#include "dynpart/csv.hpp"
#include "dynpart/decision.hpp"
#include "dynpart/eppf.hpp"
#include "dynpart/normal_model.hpp"
#include "dynpart/partition.hpp"
#include "dynpart/partition_metrics.hpp"
#include "dynpart/psm.hpp"
#include "dynpart/rng.hpp"
#include "dynpart/run_config.hpp"
#include "dynpart/sampler.hpp"
#include "dynpart/synthetic.hpp"
#include "dynpart/version.hpp"
