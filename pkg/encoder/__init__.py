# encoder package
