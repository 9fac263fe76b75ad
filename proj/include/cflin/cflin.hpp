#pragma once

#include "cflin/analysis.hpp"
#include "cflin/carleman_classical.hpp"
#include "cflin/carleman_fourier.hpp"
#include "cflin/fourier_field.hpp"
#include "cflin/integrate.hpp"
#include "cflin/kuramoto.hpp"
#include "cflin/multi_index.hpp"
#include "cflin/work_pool.hpp"
