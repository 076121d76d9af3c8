"""Vehicle routing with time windows, capacities and truck platooning on a road network."""

from .bruteforce import brute_force_optimum
from .cost import CostBreakdown, arc_energy
from .errors import (
    DemandExceedsCapacity,
    DisconnectedNetwork,
    Infeasible,
    InstanceInvalid,
    MalformedSolution,
    NoFeasibleSolutionFound,
    PlatoonError,
    SizeLimitExceeded,
)
from .evaluate import Violation, check_feasibility, evaluate_solution, structural_flags
from .grouping import assign_trucks, discretize_capacity, group_customers, knapsack_assign, tw_feasible
from .instance import CustomerDemand, Parameters, ProblemInstance
from .io import bundled_instance, load_instance, load_solution, save_instance, save_solution
from .milp import MilpModel, build_full_model, export_mps, read_mps
from .network import DistMatrix, RoadNetwork, all_pairs_shortest_paths, shortest_path_under
from .orchestrator import SolverConfig, benefit_curve, platooning_benefit, solve, update_link_costs
from .routing import build_route, compute_load_profile, expand_route
from .scheduling import extract_platoon_sets, schedule_exact, schedule_greedy
from .solution import Role, RoutePlan, Schedule, Solution, TruckSchedule

__all__ = [name for name in dir() if not name.startswith("_")]
