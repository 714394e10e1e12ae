# -*- coding: utf-8 -*-
"""
HTTP 服务

把求解器以 JSON API 的形式提供给前端（作图、参数探索）。
生产环境由 gunicorn 加载 app:create_app()。
"""

import os

from flask import Flask, jsonify, request
from flask_cors import CORS
from werkzeug.exceptions import HTTPException

import settings
from log_utils import log_message, setup_logging
from routes import addressing_bp


def create_app(testing: bool = False) -> Flask:
    """创建Flask应用"""
    setup_logging(log_to_file=False if testing else None)

    app = Flask(__name__)
    app.config['TESTING'] = testing
    CORS(app, origins=settings.CORS_ORIGINS)

    # 添加请求日志中间件
    @app.before_request
    def log_request_info():
        log_message(f"请求: {request.method} {request.path} - IP: {request.remote_addr}", "DEBUG")

    # ========== 错误处理 ==========

    @app.errorhandler(404)
    def not_found(error):
        return jsonify({
            'success': False,
            'error': '接口不存在'
        }), 404

    @app.errorhandler(405)
    def method_not_allowed(error):
        return jsonify({
            'success': False,
            'error': '请求方法不允许'
        }), 405

    @app.errorhandler(Exception)
    def handle_exception(e):
        if isinstance(e, HTTPException):
            return jsonify({'success': False, 'error': e.description}), e.code
        log_message(f"未处理的异常: {str(e)}", "ERROR")
        return jsonify({
            'success': False,
            'error': '服务器内部错误',
            'message': str(e)
        }), 500

    # ========== 注册蓝图 ==========
    app.register_blueprint(addressing_bp)

    return app


if __name__ == '__main__':
    # 确保工作目录在脚本所在目录
    os.chdir(os.path.dirname(os.path.abspath(__file__)))
    print(f"启动 {settings.TOOL_NAME} v{settings.VERSION} API 服务，端口 {settings.API_PORT}")
    create_app().run(host='0.0.0.0', port=settings.API_PORT, debug=True, threaded=True)
