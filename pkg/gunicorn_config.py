"""
Gunicorn配置文件
用于生产环境部署
"""

import os

import settings

bind = f"0.0.0.0:{settings.API_PORT}"
workers = 2
worker_class = "sync"
threads = 4
# 大 N 的扫描可能耗时较长
timeout = 120
keepalive = 5

# 进程名称
proc_name = settings.TOOL_NAME

# 日志配置
os.makedirs(settings.LOG_DIR, exist_ok=True)
accesslog = os.path.join(settings.LOG_DIR, 'access.log')
errorlog = os.path.join(settings.LOG_DIR, 'error.log')
loglevel = settings.LOG_LEVEL.lower()
access_log_format = '%(h)s %(l)s %(u)s %(t)s "%(r)s" %(s)s %(b)s "%(f)s" "%(a)s" %(D)s'

preload_app = True

# PID文件
pidfile = os.path.join(os.path.dirname(__file__), 'gunicorn.pid')

daemon = False


def when_ready(server):
    """服务器启动完成时的回调"""
    server.log.info("Server is ready. Spawning workers")


def post_fork(server, worker):
    """工作进程创建后的回调"""
    server.log.info(f"Worker spawned (pid: {worker.pid})")


def worker_exit(server, worker):
    """工作进程退出时的回调"""
    server.log.info(f"Worker exit (pid: {worker.pid})")
