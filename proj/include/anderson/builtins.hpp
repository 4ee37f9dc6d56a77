#pragma once

// Textual specifications of potentials, kernels, nonlinearities and initial
// fields as accepted by the command line:
//
//   potential     builtin:const:<v>
//                 builtin:spike:<q>[:<amp>]      amp * max(d(x, x0), h)^(-2/q), x0 = centre
//                 builtin:random:<seed>[:<K>[:<amp>]]
//                 <path>.csv | <path>.f64
//   kernel        builtin:negconst:<v> | builtin:neggauss:<sigma> | <path>
//   nonlinearity  pow3 | pow:<ell> | table:<path.csv>[:<ell>:<gamma>:<k>]
//   init          zero | one | const:<v> | random:<seed>

#include <string>

#include "anderson/nonlinearity.hpp"
#include "anderson/schrodinger_spectral.hpp"
#include "anderson/torus_grid.hpp"

namespace anderson {

Potential make_potential(const std::string& spec, const TorusGrid& grid);
GridField make_kernel(const std::string& spec, const TorusGrid& grid);
Nonlinearity make_nonlinearity(const std::string& spec);
GridField make_init(const std::string& spec, const TorusGrid& grid);

}  // namespace anderson
