#pragma once

#include "sgl/data.hpp"
#include "sgl/partition.hpp"
#include "sgl/penalty.hpp"
#include "sgl/problem.hpp"
#include "sgl/run_record.hpp"
#include "sgl/screening.hpp"
#include "sgl/solver.hpp"
