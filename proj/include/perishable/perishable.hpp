#pragma once

#include "perishable/errors.hpp"
#include "perishable/exact_analyzer.hpp"
#include "perishable/harness.hpp"
#include "perishable/instance.hpp"
#include "perishable/instance_io.hpp"
#include "perishable/mechanism.hpp"
#include "perishable/offline_oracle.hpp"
#include "perishable/online_allocator.hpp"
#include "perishable/rng.hpp"
#include "perishable/trials.hpp"
