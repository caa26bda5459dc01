#pragma once

#include "ipe/affinity.hpp"
#include "ipe/crf.hpp"
#include "ipe/egm.hpp"
#include "ipe/error.hpp"
#include "ipe/feature_io.hpp"
#include "ipe/image_ops.hpp"
#include "ipe/metrics.hpp"
#include "ipe/pgm.hpp"
#include "ipe/random.hpp"
#include "ipe/selection.hpp"
#include "ipe/spectral.hpp"
#include "ipe/synthetic.hpp"
