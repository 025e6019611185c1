method = None
method_name = None
method_args = None
import_file = None
import_error = None
def set_import(import_fromp):
    global import_file
    import_file = import_fromp

def set_method(import_methodp, method_argsp):
    global method_name, method_args
    method_name = import_methodp
    method_args = method_argsp

if "__main__" in __name__:
    while True:
        if import_file is not None:
            try:
                with open(import_file, "rb") as source_file:
                    code = compile(source_file.read(), import_file, "exec")
                exec(code)
                import_error = None
            except Exception as e:
                import_error = repr(e)
            import_file = None
        if method_name is not None and method_args is not None:
            try:
                method = eval(method_name)
                res = method(*method_args)
            except Exception as e:
                pass
            method_args = None
            method_name = None
