#pragma once

#include "freeball/errors.hpp"
#include "freeball/freepoly.hpp"
#include "freeball/json_io.hpp"
#include "freeball/linalg.hpp"
#include "freeball/linearize.hpp"
#include "freeball/matrix_tuple.hpp"
#include "freeball/ncball.hpp"
#include "freeball/ngn.hpp"
#include "freeball/parallel.hpp"
#include "freeball/pencil.hpp"
#include "freeball/ratexpr.hpp"
#include "freeball/realization.hpp"
#include "freeball/version.hpp"
