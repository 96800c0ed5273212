from fastapi import APIRouter
from app.api.v1.endpoints import simulations

api_router = APIRouter()

api_router.include_router(
    simulations.router,
    prefix="/simulations",
    tags=["simulations"]
)
