#pragma once

#include "gridfr/error.hpp"
#include "gridfr/harness.hpp"
#include "gridfr/image_io.hpp"
#include "gridfr/metrics.hpp"
#include "gridfr/numerics.hpp"
#include "gridfr/quadrature.hpp"
#include "gridfr/raster.hpp"
#include "gridfr/recon.hpp"
#include "gridfr/rng.hpp"
#include "gridfr/sampling.hpp"
#include "gridfr/window.hpp"
