#pragma once

#include "meshpredict/config.hpp"
#include "meshpredict/controller.hpp"
#include "meshpredict/error.hpp"
#include "meshpredict/estimator.hpp"
#include "meshpredict/harness.hpp"
#include "meshpredict/link_models.hpp"
#include "meshpredict/mesh_model.hpp"
#include "meshpredict/oracle.hpp"
#include "meshpredict/plant.hpp"
#include "meshpredict/rng.hpp"
