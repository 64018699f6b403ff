#pragma once

#include "feslab/neurosim/env.hpp"

namespace feslab::neurosim {

/// Built-in plant parameter sets for the three control cases. The shipped
/// configuration files carry the same numbers; tests build plants from here.
PlantConfig default_plant_config(PlantType type);

}  // namespace feslab::neurosim
