# Endpoints module initialization 