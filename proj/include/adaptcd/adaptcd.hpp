#pragma once

#include "adaptcd/calibrate.hpp"
#include "adaptcd/csv.hpp"
#include "adaptcd/detectors.hpp"
#include "adaptcd/diffraction.hpp"
#include "adaptcd/errors.hpp"
#include "adaptcd/frame.hpp"
#include "adaptcd/lrcore.hpp"
#include "adaptcd/omd.hpp"
#include "adaptcd/parallel.hpp"
#include "adaptcd/pipeline.hpp"
#include "adaptcd/random.hpp"
#include "adaptcd/report.hpp"
#include "adaptcd/standardize.hpp"
#include "adaptcd/summation.hpp"
