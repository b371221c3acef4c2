#pragma once

#include "leafscan/augmentation.hpp"
#include "leafscan/colorspace.hpp"
#include "leafscan/dataset.hpp"
#include "leafscan/error.hpp"
#include "leafscan/evaluation.hpp"
#include "leafscan/features.hpp"
#include "leafscan/image_io.hpp"
#include "leafscan/line_search.hpp"
#include "leafscan/mlp.hpp"
#include "leafscan/pipeline.hpp"
#include "leafscan/random.hpp"
#include "leafscan/raster.hpp"
#include "leafscan/runtime.hpp"
#include "leafscan/segmentation.hpp"
#include "leafscan/serialization.hpp"
#include "leafscan/synthetic.hpp"
#include "leafscan/trainers.hpp"
