#pragma once

#include "degctl/coefficient.hpp"
#include "degctl/control.hpp"
#include "degctl/discretization.hpp"
#include "degctl/error.hpp"
#include "degctl/evolution.hpp"
#include "degctl/pipeline.hpp"
#include "degctl/scenario.hpp"
#include "degctl/spectral.hpp"
#include "degctl/tridiagonal.hpp"
