from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from fraudbench.database import init_db
from fraudbench.errors import FraudBenchError, RunNotFound
from fraudbench.routers import router

init_db()

app = FastAPI(title="fraudbench")
app.include_router(router)


@app.exception_handler(FraudBenchError)
async def fraudbench_exception_handler(request: Request, exc: FraudBenchError):
    """
    fraudbench の例外を統一形式の JSON にする
    - RunNotFound は 404、それ以外は 400
    """
    return JSONResponse(
        status_code=404 if isinstance(exc, RunNotFound) else 400,
        content={
            "error": exc.message,
            "error_code": exc.error_code,
            "type": type(exc).__name__,
        },
    )
