// Umbrella header.
#pragma once

#include "hmfe/basis.hpp"
#include "hmfe/coarse.hpp"
#include "hmfe/element.hpp"
#include "hmfe/hybrid.hpp"
#include "hmfe/local_condensation.hpp"
#include "hmfe/manufactured.hpp"
#include "hmfe/material.hpp"
#include "hmfe/mesh.hpp"
#include "hmfe/parallel.hpp"
#include "hmfe/pcg.hpp"
#include "hmfe/quadrature.hpp"
#include "hmfe/schur.hpp"
#include "hmfe/schwarz.hpp"
#include "hmfe/study.hpp"
