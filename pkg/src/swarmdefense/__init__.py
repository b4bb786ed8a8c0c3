"""Multi-mode area defense: clustering, assignment solvers and simulation."""

from .dynamics import (AgentParams, AgentState, PathParametrization, WorldGeometry,
                       interception_time, speed_bound, step, time_optimal_traj,
                       time_to_reach, winning_region)
from .clustering import (ClusteringParams, SwarmPartition, cluster, dbscan_params,
                         detect_split, split_threshold, swarm_radius)
from .formations import (LineFormation, NetTeam, conical_envelope_contains,
                         line_slots, split_clusters_equal, split_unclustered_groups,
                         terminal_groups)
from .binprog import (BinaryProgram, Constraint, Solution, SolveBudgetExceeded,
                      brute_force, dump_program, objective_value, solve)
from .assignment import (CostModelReport, GatheringPlan, ResourceTable,
                         SplitAssignment, SplitSnapshot, assign_interceptors,
                         check_split_assignment, collision_cost,
                         evaluate_split_assignment, gather_assignment,
                         interception_cost, is_risk_taking_swarm,
                         plan_gathering_formations, snapshot_from_dict,
                         snapshot_to_dict, solve_split_hierarchical,
                         solve_split_miqcqp, solve_split_rs_miqcqp,
                         worst_case_costs)
from .simulation import (ScenarioConfig, SimTrace, Simulator, attacker_control,
                         collision_avoid, config_from_dict, defender_phase_control,
                         load_config, run, snapshot_presplit)
from .bench import BenchInstance, BenchRecord, bench_assign, gen_instance

__version__ = "0.1.0"
