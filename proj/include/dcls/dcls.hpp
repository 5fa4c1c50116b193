#pragma once

#include "dcls/errors.hpp"
#include "dcls/multi_index.hpp"
#include "dcls/index_sets.hpp"
#include "dcls/jacobi.hpp"
#include "dcls/sampling.hpp"
#include "dcls/least_squares.hpp"
#include "dcls/model_selection.hpp"
#include "dcls/conditions.hpp"
#include "dcls/experiments.hpp"
#include "dcls/io.hpp"
