#pragma once

#include "feplab/units.hpp"
#include "feplab/errors.hpp"
#include "feplab/vehicle_dynamics.hpp"
#include "feplab/flight_envelope.hpp"
#include "feplab/ndi_controller.hpp"
#include "feplab/interval_qp.hpp"
#include "feplab/safety_filter.hpp"
#include "feplab/scenario.hpp"
#include "feplab/config.hpp"
#include "feplab/sim_harness.hpp"
