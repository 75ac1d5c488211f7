# milp package
