# Goldfish peer-selection package
