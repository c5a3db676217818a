# Algorithmic components: mesh, barrier, Mads and the algorithms built on it
