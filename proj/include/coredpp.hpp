#pragma once

#include "coredpp/baselines.hpp"
#include "coredpp/coreset.hpp"
#include "coredpp/datagen.hpp"
#include "coredpp/diagnostics.hpp"
#include "coredpp/errors.hpp"
#include "coredpp/kdpp.hpp"
#include "coredpp/kernels.hpp"
#include "coredpp/partition.hpp"
#include "coredpp/random.hpp"
#include "coredpp/sampler.hpp"
