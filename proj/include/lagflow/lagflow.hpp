#pragma once

#include "lagflow/acceptance.hpp"
#include "lagflow/brownian.hpp"
#include "lagflow/config.hpp"
#include "lagflow/corpus.hpp"
#include "lagflow/error.hpp"
#include "lagflow/field.hpp"
#include "lagflow/field_io.hpp"
#include "lagflow/flow.hpp"
#include "lagflow/grid.hpp"
#include "lagflow/lagrangian.hpp"
#include "lagflow/parallel.hpp"
#include "lagflow/potential.hpp"
#include "lagflow/reference.hpp"
#include "lagflow/run.hpp"
#include "lagflow/sobolev.hpp"
#include "lagflow/solver.hpp"
