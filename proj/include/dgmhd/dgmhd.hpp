#pragma once

#include "dgmhd/checks.hpp"
#include "dgmhd/diagnostics.hpp"
#include "dgmhd/driver.hpp"
#include "dgmhd/errors.hpp"
#include "dgmhd/forms.hpp"
#include "dgmhd/mesh.hpp"
#include "dgmhd/projection.hpp"
#include "dgmhd/quadrature.hpp"
#include "dgmhd/rt_space.hpp"
#include "dgmhd/scenarios.hpp"
#include "dgmhd/time_stepper.hpp"
