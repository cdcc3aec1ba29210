#pragma once

#include "neckvol/circumference.hpp"
#include "neckvol/config.hpp"
#include "neckvol/depth_frame.hpp"
#include "neckvol/error.hpp"
#include "neckvol/filtering.hpp"
#include "neckvol/peaks.hpp"
#include "neckvol/pgm_io.hpp"
#include "neckvol/phantom.hpp"
#include "neckvol/phantom_json.hpp"
#include "neckvol/pipeline.hpp"
#include "neckvol/point_cloud.hpp"
#include "neckvol/reconstruct.hpp"
#include "neckvol/registration.hpp"
#include "neckvol/stats.hpp"
#include "neckvol/volumetry.hpp"
