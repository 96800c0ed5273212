# Schemas module initialization 