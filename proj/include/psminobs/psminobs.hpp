#pragma once

#include "psminobs/error.hpp"
#include "psminobs/core_model.hpp"
#include "psminobs/bdeu_scoring.hpp"
#include "psminobs/score_io.hpp"
#include "psminobs/budget.hpp"
#include "psminobs/order_search.hpp"
#include "psminobs/sampler.hpp"
#include "psminobs/parallel_engine.hpp"
