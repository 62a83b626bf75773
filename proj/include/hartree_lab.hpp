#pragma once

#include "hartree_lab/exponents.hpp"
#include "hartree_lab/grid.hpp"
#include "hartree_lab/riesz.hpp"
#include "hartree_lab/potentials.hpp"
#include "hartree_lab/groundstate.hpp"
#include "hartree_lab/virial.hpp"
#include "hartree_lab/evolve.hpp"
#include "hartree_lab/morawetz.hpp"
#include "hartree_lab/io.hpp"
#include "hartree_lab/scenario.hpp"
