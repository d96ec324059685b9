#pragma once

#include "ssep/erfc.hpp"
#include "ssep/expectation.hpp"
#include "ssep/harness.hpp"
#include "ssep/kmc.hpp"
#include "ssep/limits.hpp"
#include "ssep/model.hpp"
#include "ssep/parallel.hpp"
#include "ssep/quadrature.hpp"
#include "ssep/rng.hpp"
#include "ssep/sticky_walk.hpp"
#include "ssep/verify.hpp"
