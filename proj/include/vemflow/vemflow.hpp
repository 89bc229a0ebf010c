#pragma once

#include "vemflow/common.hpp"
#include "vemflow/geometry.hpp"
#include "vemflow/quadrature.hpp"
#include "vemflow/poly.hpp"
#include "vemflow/mesh.hpp"
#include "vemflow/mesh_io.hpp"
#include "vemflow/space.hpp"
#include "vemflow/law.hpp"
#include "vemflow/assembly.hpp"
#include "vemflow/solve.hpp"
#include "vemflow/verify.hpp"
#include "vemflow/checks.hpp"
