# mission package
