#pragma once

#include <string>

#include "canopyflux/sapflow.hpp"

namespace canopyflux {

/// Line chart of weekly transpiration: x = ISO week, y = mm day-1. Runs of
/// consecutive weeks form one <polyline> each, so missing weeks render as
/// breaks; every point also gets a marker. Throws EmptyInput when there is
/// nothing to draw.
std::string render_transpiration_svg(const WeeklyTranspiration& weekly);

}  // namespace canopyflux
