#pragma once

#include "rtint/absorption.hpp"
#include "rtint/analysis.hpp"
#include "rtint/cluster_tree.hpp"
#include "rtint/entry_generator.hpp"
#include "rtint/hmatrix.hpp"
#include "rtint/io.hpp"
#include "rtint/kernels.hpp"
#include "rtint/mesh.hpp"
#include "rtint/planck.hpp"
#include "rtint/quadrature.hpp"
#include "rtint/scenario.hpp"
#include "rtint/solver.hpp"
#include "rtint/transport.hpp"
#include "rtint/vec3.hpp"
