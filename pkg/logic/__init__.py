# logic package
