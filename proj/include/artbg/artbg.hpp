#pragma once

#include "artbg/artificial_background.hpp"
#include "artbg/domain.hpp"
#include "artbg/errors.hpp"
#include "artbg/farfield.hpp"
#include "artbg/forward_scattering.hpp"
#include "artbg/glsm_indicator.hpp"
#include "artbg/io.hpp"
#include "artbg/linalg.hpp"
#include "artbg/pipeline.hpp"
#include "artbg/special_functions.hpp"
#include "artbg/spectra.hpp"
