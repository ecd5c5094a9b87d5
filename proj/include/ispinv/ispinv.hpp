#pragma once

#include "ispinv/degradation.hpp"
#include "ispinv/error.hpp"
#include "ispinv/evaluation.hpp"
#include "ispinv/image.hpp"
#include "ispinv/inverse_naive.hpp"
#include "ispinv/inverse_robust.hpp"
#include "ispinv/io.hpp"
#include "ispinv/isp_forward.hpp"
#include "ispinv/isp_jacobian.hpp"
#include "ispinv/linalg.hpp"
#include "ispinv/metrics.hpp"
#include "ispinv/parallel.hpp"
#include "ispinv/self_check.hpp"
#include "ispinv/svd3.hpp"
#include "ispinv/synth.hpp"
#include "ispinv/version.hpp"
