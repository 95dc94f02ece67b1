#pragma once

#include "mammo/augmentation/classic.hpp"
#include "mammo/augmentation/elastic.hpp"
#include "mammo/augmentation/inpaint.hpp"
#include "mammo/augmentation/natural_deform.hpp"
#include "mammo/augmentation/resize.hpp"
#include "mammo/augmentation/sample.hpp"
#include "mammo/core/bbox.hpp"
#include "mammo/core/filters.hpp"
#include "mammo/core/otsu.hpp"
#include "mammo/core/raster.hpp"
#include "mammo/enhancement.hpp"
#include "mammo/error.hpp"
#include "mammo/evaluation/froc.hpp"
#include "mammo/evaluation/io.hpp"
#include "mammo/evaluation/matching.hpp"
#include "mammo/io/image_io.hpp"
#include "mammo/normalization.hpp"
#include "mammo/pipeline/batch.hpp"
#include "mammo/pipeline/config.hpp"
#include "mammo/pipeline/convert.hpp"
#include "mammo/pipeline/folds.hpp"
#include "mammo/pipeline/manifest.hpp"
#include "mammo/random.hpp"
#include "mammo/scheduler/scheduler.hpp"
