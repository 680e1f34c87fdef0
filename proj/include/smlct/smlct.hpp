#pragma once

#include "smlct/calibration.hpp"
#include "smlct/config.hpp"
#include "smlct/core.hpp"
#include "smlct/fft.hpp"
#include "smlct/geometry.hpp"
#include "smlct/image.hpp"
#include "smlct/io.hpp"
#include "smlct/metrics.hpp"
#include "smlct/phantom.hpp"
#include "smlct/pipeline.hpp"
#include "smlct/projector.hpp"
#include "smlct/recon.hpp"
#include "smlct/registration.hpp"
