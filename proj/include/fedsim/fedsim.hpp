#pragma once

// Umbrella header for the whole library.

#include "fedsim/aggregate.hpp"
#include "fedsim/batches.hpp"
#include "fedsim/cifar.hpp"
#include "fedsim/config.hpp"
#include "fedsim/dataset.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/experiment.hpp"
#include "fedsim/idx.hpp"
#include "fedsim/model.hpp"
#include "fedsim/nn.hpp"
#include "fedsim/partition.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/round.hpp"
#include "fedsim/synth.hpp"
#include "fedsim/tensor.hpp"
