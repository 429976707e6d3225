"""
Pipeline graph for the design, simulate and export-matrices commands
"""
import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))


from langgraph.graph import StateGraph, END
from graphs.state import ScenarioState
from utils.constants import NodeNames
from utils.logger import get_logger

from nodes.configure import configure_node, route_after_configure
from nodes.lifted_model import build_lifted_node, route_after_lifted
from nodes.design_sweep import design_sweep_node
from nodes.build_demand import build_demand_node
from nodes.simulate import simulate_node
from nodes.evaluate import evaluate_node
from nodes.export import export_node
from nodes.final_response import final_response_node, error_handler_node
from nodes.common import route_on_error

logger = get_logger("ScenarioGraph")


def create_scenario_graph():
    """
    Create and compile the scenario pipeline

    design:          configure -> build_lifted -> design_sweep -> export
    export-matrices: configure -> build_lifted -> export
    simulate:        configure -> build_demand -> simulate -> evaluate -> export

    Any failing stage routes to error_handler; every path ends in final_response.

    Returns:
        Compiled graph
    """
    logger.info("Building scenario graph...")

    workflow = StateGraph(ScenarioState)

    workflow.add_node(NodeNames.CONFIGURE, configure_node)
    workflow.add_node(NodeNames.BUILD_LIFTED, build_lifted_node)
    workflow.add_node(NodeNames.DESIGN_SWEEP, design_sweep_node)
    workflow.add_node(NodeNames.BUILD_DEMAND, build_demand_node)
    workflow.add_node(NodeNames.SIMULATE, simulate_node)
    workflow.add_node(NodeNames.EVALUATE, evaluate_node)
    workflow.add_node(NodeNames.EXPORT, export_node)
    workflow.add_node(NodeNames.ERROR_HANDLER, error_handler_node)
    workflow.add_node(NodeNames.FINAL_RESPONSE, final_response_node)

    workflow.set_entry_point(NodeNames.CONFIGURE)

    # From configure - branch on the command
    workflow.add_conditional_edges(
        NodeNames.CONFIGURE,
        route_after_configure,
        {
            NodeNames.BUILD_LIFTED: NodeNames.BUILD_LIFTED,
            NodeNames.BUILD_DEMAND: NodeNames.BUILD_DEMAND,
            NodeNames.ERROR_HANDLER: NodeNames.ERROR_HANDLER,
        }
    )

    # From build_lifted - sweep for design, straight to export for matrices
    workflow.add_conditional_edges(
        NodeNames.BUILD_LIFTED,
        route_after_lifted,
        {
            NodeNames.DESIGN_SWEEP: NodeNames.DESIGN_SWEEP,
            NodeNames.EXPORT: NodeNames.EXPORT,
            NodeNames.ERROR_HANDLER: NodeNames.ERROR_HANDLER,
        }
    )

    # Linear stages: continue on success, error_handler on failure
    for source, target in (
        (NodeNames.DESIGN_SWEEP, NodeNames.EXPORT),
        (NodeNames.BUILD_DEMAND, NodeNames.SIMULATE),
        (NodeNames.SIMULATE, NodeNames.EVALUATE),
        (NodeNames.EVALUATE, NodeNames.EXPORT),
        (NodeNames.EXPORT, NodeNames.FINAL_RESPONSE),
    ):
        workflow.add_conditional_edges(
            source,
            route_on_error(target),
            {
                target: target,
                NodeNames.ERROR_HANDLER: NodeNames.ERROR_HANDLER,
            }
        )

    workflow.add_edge(NodeNames.ERROR_HANDLER, NodeNames.FINAL_RESPONSE)
    workflow.add_edge(NodeNames.FINAL_RESPONSE, END)

    app = workflow.compile()

    logger.info("Scenario graph compiled successfully")

    return app


_scenario_app = None


def get_scenario_graph():
    """Get the compiled graph instance, building it on first use"""
    global _scenario_app
    if _scenario_app is None:
        _scenario_app = create_scenario_graph()
    return _scenario_app
