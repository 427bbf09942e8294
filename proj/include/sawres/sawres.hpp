#pragma once

#include "sawres/constants.hpp"
#include "sawres/dataio.hpp"
#include "sawres/errors.hpp"
#include "sawres/fitting.hpp"
#include "sawres/geometry.hpp"
#include "sawres/lineshape.hpp"
#include "sawres/loss.hpp"
#include "sawres/report.hpp"
#include "sawres/response.hpp"
