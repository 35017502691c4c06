#pragma once

#include "wignerkit/errors.hpp"
#include "wignerkit/numeric.hpp"
#include "wignerkit/fock.hpp"
#include "wignerkit/grid.hpp"
#include "wignerkit/wigner.hpp"
#include "wignerkit/inversion.hpp"
#include "wignerkit/positivity.hpp"
#include "wignerkit/poly.hpp"
#include "wignerkit/diffform.hpp"
#include "wignerkit/master_equation.hpp"
#include "wignerkit/rng.hpp"
#include "wignerkit/fpsim.hpp"
#include "wignerkit/io.hpp"
