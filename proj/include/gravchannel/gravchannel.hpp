#pragma once

#include "gravchannel/analytics.hpp"
#include "gravchannel/errors.hpp"
#include "gravchannel/eta.hpp"
#include "gravchannel/gaussian.hpp"
#include "gravchannel/generator.hpp"
#include "gravchannel/hilbert/dense.hpp"
#include "gravchannel/hilbert/fock.hpp"
#include "gravchannel/hilbert/sse.hpp"
#include "gravchannel/models.hpp"
#include "gravchannel/ode.hpp"
#include "gravchannel/parallel.hpp"
#include "gravchannel/params.hpp"
#include "gravchannel/quadrature.hpp"
#include "gravchannel/units.hpp"
