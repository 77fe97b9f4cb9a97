#pragma once

#include "bearing/configuration.hpp"
#include "bearing/error.hpp"
#include "bearing/formation.hpp"
#include "bearing/generators.hpp"
#include "bearing/graph.hpp"
#include "bearing/laplacian.hpp"
#include "bearing/localization.hpp"
#include "bearing/rigidity.hpp"
#include "bearing/runner.hpp"
#include "bearing/scenario.hpp"
#include "bearing/simulation.hpp"
