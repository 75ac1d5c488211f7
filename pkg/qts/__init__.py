# qts package
