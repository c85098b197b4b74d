#pragma once

// Umbrella header for the whole library.

#include "mtx/bench.hpp"
#include "mtx/data.hpp"
#include "mtx/discriminator.hpp"
#include "mtx/encoder.hpp"
#include "mtx/generator.hpp"
#include "mtx/image.hpp"
#include "mtx/image_io.hpp"
#include "mtx/losses.hpp"
#include "mtx/mdan.hpp"
#include "mtx/mgan.hpp"
#include "mtx/net_io.hpp"
#include "mtx/nn.hpp"
#include "mtx/noise.hpp"
#include "mtx/patches.hpp"
#include "mtx/persistence.hpp"
#include "mtx/tensor.hpp"
