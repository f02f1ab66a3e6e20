#pragma once

// Everything in one include.

#include "coverplan/common.hpp"
#include "coverplan/io/atomic_file.hpp"
#include "coverplan/io/ply.hpp"
#include "coverplan/io/svg.hpp"
#include "coverplan/route/clusters.hpp"
#include "coverplan/route/plan.hpp"
#include "coverplan/route/tsp.hpp"
#include "coverplan/segment/normals.hpp"
#include "coverplan/segment/segment.hpp"
#include "coverplan/sim/mission.hpp"
#include "coverplan/sim/outputs.hpp"
#include "coverplan/sim/pipeline.hpp"
#include "coverplan/sim/sensor.hpp"
#include "coverplan/traj_mpc/controller.hpp"
#include "coverplan/traj_mpc/mpc.hpp"
#include "coverplan/traj_static/bspline.hpp"
#include "coverplan/traj_static/guide_path.hpp"
#include "coverplan/traj_static/optimize.hpp"
#include "coverplan/view_adapt/adapt.hpp"
#include "coverplan/viewpoints/viewpoint.hpp"
#include "coverplan/world/distance_field.hpp"
#include "coverplan/world/obstacle.hpp"
#include "coverplan/world/params.hpp"
#include "coverplan/world/raycast.hpp"
#include "coverplan/world/scenario.hpp"
#include "coverplan/world/surface.hpp"
#include "coverplan/world/voxel_grid.hpp"
