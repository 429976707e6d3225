"""
Numerical core: grid model, demand, nonlinear simulation, lifted model, ILC and certificates
"""
