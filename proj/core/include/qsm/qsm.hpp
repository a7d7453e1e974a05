#pragma once

#include "qsm/currents.hpp"
#include "qsm/dynamics.hpp"
#include "qsm/error.hpp"
#include "qsm/hamgen.hpp"
#include "qsm/numerics.hpp"
#include "qsm/readout.hpp"
#include "qsm/septask.hpp"
#include "qsm/serialize.hpp"
#include "qsm/state.hpp"
#include "qsm/train.hpp"
