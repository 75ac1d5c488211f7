# planner package
