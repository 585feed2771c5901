#pragma once

#include "asymptotics.hpp"
#include "contour.hpp"
#include "cramer.hpp"
#include "errors.hpp"
#include "exactprob.hpp"
#include "series.hpp"
#include "variational.hpp"
#include "version.hpp"
#include "weights.hpp"
