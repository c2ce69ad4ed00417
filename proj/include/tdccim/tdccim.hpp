#pragma once

#include "tdccim/analog.hpp"
#include "tdccim/cnn.hpp"
#include "tdccim/error.hpp"
#include "tdccim/io.hpp"
#include "tdccim/mapper.hpp"
#include "tdccim/metrics.hpp"
#include "tdccim/pipeline.hpp"
#include "tdccim/quant.hpp"
#include "tdccim/tdc.hpp"
